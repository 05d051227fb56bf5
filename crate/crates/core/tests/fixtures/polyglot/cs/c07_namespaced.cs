namespace App {
    using Newtonsoft.Json;

    class C07 {}
}

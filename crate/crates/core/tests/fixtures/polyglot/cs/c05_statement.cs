using System.Net.Http;

class C05 {
    void M(string path) {
        using (var reader = Open(path)) { }
        using var writer = Open(path);
    }
}

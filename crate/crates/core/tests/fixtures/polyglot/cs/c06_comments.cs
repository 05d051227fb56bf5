// using Fake.Namespace;
/* using Ghost.Namespace; */
using Real.Namespace;

class C06 {}

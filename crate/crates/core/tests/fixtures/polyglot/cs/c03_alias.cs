using Project = PC.MyCompany.Project;
using F = System.IO.File;

class C03 {}

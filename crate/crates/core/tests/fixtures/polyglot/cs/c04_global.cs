global using System.Text;

class C04 {}

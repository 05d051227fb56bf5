using static System.Math;
using static System.Console;

class C02 {}

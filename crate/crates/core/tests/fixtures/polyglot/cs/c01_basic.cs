using System;
using System.Collections.Generic;

class C01 {}

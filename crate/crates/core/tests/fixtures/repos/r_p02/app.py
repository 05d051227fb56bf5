import numpy
import pandas
import scipy
import localmod
from . import models

STATE = {}

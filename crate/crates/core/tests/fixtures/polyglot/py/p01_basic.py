import numpy as np
from collections import deque

q = deque(np.arange(3))

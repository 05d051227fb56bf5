# import fake
import json  # import alsofake
DATA = json.dumps({})

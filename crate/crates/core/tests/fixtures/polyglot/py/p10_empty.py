# constants only
ANSWER = 42
GREETING = 'hello'

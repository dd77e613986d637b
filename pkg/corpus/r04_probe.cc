# s compares the ping against its own value and reports back.
def X = c.ping -> s; if s=c then s -> c[same]; 0 else s -> c[diff]; X
main = X

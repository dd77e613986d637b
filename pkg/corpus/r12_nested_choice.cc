# Inner retry: one more comparison before giving up.
def X = c.msg -> s; if s=c then s -> c[ok]; X else s -> c[retry]; if s=c then s -> c[ok]; X else s -> c[fail]; 0
main = X

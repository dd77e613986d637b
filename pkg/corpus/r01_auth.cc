# Client authentication with retry: c sends a password, a checks it
# against s, and on failure everyone loops for another attempt.
def X = c.pwd -> a; if a=s then a -> c[ok]; a -> s[ok]; s.t -> c; 0 else a -> c[ko]; a -> s[ko]; X
main = X

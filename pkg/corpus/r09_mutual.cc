# Two mutually recursive procedures.
def X = p.a -> q; Y
def Y = q.b -> p; X
main = X

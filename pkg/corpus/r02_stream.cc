def X = p.data -> q; X
main = X

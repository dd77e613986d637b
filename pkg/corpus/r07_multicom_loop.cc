def X = (a.u -> b | c.v -> d); X
main = X

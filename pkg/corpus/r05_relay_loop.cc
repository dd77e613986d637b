def X = a.m -> b; b.* -> c; c.* -> a; X
main = X

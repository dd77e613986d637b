def X = p -> q[more]; p.chunk -> q; X
main = p.size -> q; X

main = p -> q[go]; p.data -> q; 0

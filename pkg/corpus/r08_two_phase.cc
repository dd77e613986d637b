def X = c.req -> s; if s=c then s -> c[granted]; s.data -> c; 0 else s -> c[denied]; X
main = X

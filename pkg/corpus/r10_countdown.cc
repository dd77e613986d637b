def X = a.tick -> b; if b=a then b -> a[stop]; 0 else b -> a[go]; X
main = X

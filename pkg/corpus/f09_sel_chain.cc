main = a -> b[fwd]; b -> c[fwd]; c -> a[done]; 0

main = if a=b then a -> b[ok]; b.r -> a; 0 else a -> b[ko]; 0

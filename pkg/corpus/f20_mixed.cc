main = a -> b[start]; (b.x -> a | c.y -> d); if c=d then c -> d[same]; 0 else c -> d[diff]; 0

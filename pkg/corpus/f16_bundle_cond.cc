main = (a.x -> b | c.y -> d); if c=d then c -> d[same]; 0 else c -> d[diff]; 0

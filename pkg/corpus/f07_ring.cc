main = a.x -> b; b.y -> c; c.z -> a; 0

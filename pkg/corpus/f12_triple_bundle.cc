main = (a.x -> b | c.y -> d | e.z -> f); 0

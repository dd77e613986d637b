main = a.t -> b; b.* -> c; c.* -> d; d.* -> a; 0

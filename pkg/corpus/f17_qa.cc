main = c.q1 -> s; s.a1 -> c; c.q2 -> s; s.a2 -> c; 0

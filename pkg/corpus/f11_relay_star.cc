main = p.* -> q; q.* -> r; 0

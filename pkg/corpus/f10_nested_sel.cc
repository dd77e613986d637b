# Nested decisions; selections keep q's view mergeable.
main = if p=q then p -> q[t]; if p=q then p -> q[tt]; p.a -> q; 0 else p -> q[tf]; p.b -> q; 0 else p -> q[f]; 0

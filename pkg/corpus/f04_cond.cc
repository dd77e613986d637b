# p checks q's value and tells it the verdict.
main = if p=q then p -> q[yes]; 0 else p -> q[no]; 0

# Two independent comparisons; the extracted tree squares the branches.
main = if p1=p2 then if p3=p4 then 0 else 0 else if p3=p4 then 0 else 0

# A value is forwarded down a three-stage pipeline.
main = a.x -> b; b.* -> c; c.* -> d; 0

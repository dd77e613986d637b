# One producer, three consumers.
main = s.v -> a; s.v -> b; s.v -> c; 0

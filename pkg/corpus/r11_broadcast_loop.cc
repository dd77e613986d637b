def X = s.v -> a; s.v -> b; if s=a then s -> a[halt]; s -> b[halt]; 0 else s -> a[more]; s -> b[more]; X
main = X

# Two unrelated conversations, interleaved.
main = a.m -> b; c.n -> d; a.o -> b; 0

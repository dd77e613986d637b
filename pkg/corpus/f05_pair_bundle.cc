# Two independent communications in one atomic bundle.
main = (p.m -> q | r.n -> s); 0

# One message and done.
main = p.hello -> q; 0

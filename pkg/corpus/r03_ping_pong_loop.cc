def X = p.ping -> q; q.pong -> p; X
main = X

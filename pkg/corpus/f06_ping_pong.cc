main = p.ping -> q; q.pong -> p; 0

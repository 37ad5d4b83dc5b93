namespace seglab {}

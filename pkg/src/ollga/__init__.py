"""The (1+(lambda,lambda)) genetic algorithm on OneMax, with experiment tooling."""

__version__ = "0.1.0"

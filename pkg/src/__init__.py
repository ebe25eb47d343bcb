"""RsesTrial: responder-stratified exponential survival trials"""

__version__ = "1.0.0"

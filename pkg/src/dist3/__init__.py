"""
Three-dimensional distribution module
"""

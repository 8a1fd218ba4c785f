"""
Three-dimensional classification module
"""

"""
Persistence of tensors, reports and samples
"""

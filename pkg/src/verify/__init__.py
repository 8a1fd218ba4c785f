"""
Verification module
"""

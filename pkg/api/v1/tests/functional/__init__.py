"""
Functional tests package for v1 API
"""

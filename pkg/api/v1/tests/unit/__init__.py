"""
Unit tests package for v1 API
"""

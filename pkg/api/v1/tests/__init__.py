"""
V1 API tests package
"""

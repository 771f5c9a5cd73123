# Author: gadwant
"""Subpackage."""

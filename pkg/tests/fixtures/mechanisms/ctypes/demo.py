import ctypes


def add(a, b):
    lib = ctypes.CDLL("libdemo.so")
    r = lib.add(a, b)  # expect-site
    return r

import fastmath


def total(a, b):
    y = fastmath.add(a, b)
    return y

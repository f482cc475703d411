import json


def load_config(path):
    with open(path) as fh:
        return json.load(fh)


def add(a, b):
    lib = load_config("demo.json")
    r = lib.add(a, b)
    return r

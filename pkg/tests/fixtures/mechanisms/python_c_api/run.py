import spam


def run(cmd):
    status = spam.system(cmd)  # expect-site
    return status == 0

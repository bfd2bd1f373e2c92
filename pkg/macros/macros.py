import softcounter


def define_env(env):
    env.variables["package_version"] = softcounter.__version__

from setuptools import Extension, setup

setup(
    ext_modules=[
        Extension(
            "flagcoh._sparserank",
            sources=["src/flagcoh/_ext/sparserank.cpp"],
            language="c++",
            extra_compile_args=["-O2", "-std=c++14"],
            optional=True,
        )
    ]
)

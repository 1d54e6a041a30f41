# Keeps the repository root on sys.path so tests can import shared helpers
# (e.g. tests.test_model.make_fit) under any pytest invocation style.

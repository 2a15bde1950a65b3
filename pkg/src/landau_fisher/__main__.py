from landau_fisher.cli import entry

entry()

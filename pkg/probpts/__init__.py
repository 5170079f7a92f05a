"""
probpts
=======

Probabilistic points-to analysis for a small language with pointers and fork-join threads.


Features
--------

-   Compute, for every program point, the addresses each pointer may hold, and the probability that it holds them.
-   Run programs on a reference interpreter that explores every serialization of every ``par``.
-   Check the analysis against the interpreter, on one program or on thousands of random ones.
-   Serve the analyzer over HTTP, using :ref:`aiohttp <aiohttp-web>`.


Usage
-----

.. toctree::
    :maxdepth: 1

    installation
    syntax
    lattice
    interp
    analyzer
    check
    fuzz
    report
    server
    main


More information
----------------

.. toctree::
    :maxdepth: 1

    contributing
    changelog


.. include:: /_include/links.rst
"""

__version__ = "0.1.0"

import threading
from contextlib import contextmanager


class RWLock:
    """Reentrant readers-writer lock.

    Any number of threads may hold the read side. The write side is exclusive
    and reentrant; the writing thread may also take read locks.
    """

    def __init__(self):
        self._cond = threading.Condition(threading.Lock())
        self._readers = 0
        self._writer = None
        self._write_depth = 0
        self._local = threading.local()

    def _read_depth(self):
        return getattr(self._local, "depth", 0)

    def acquire_read(self):
        me = threading.get_ident()
        depth = self._read_depth()
        if self._writer == me or depth:
            self._local.depth = depth + 1
            return
        with self._cond:
            while self._writer is not None:
                self._cond.wait()
            self._readers += 1
        self._local.depth = 1

    def release_read(self):
        depth = self._read_depth() - 1
        self._local.depth = depth
        if depth or self._writer == threading.get_ident():
            return
        with self._cond:
            self._readers -= 1
            if not self._readers:
                self._cond.notify_all()

    def acquire_write(self):
        me = threading.get_ident()
        if self._writer == me:
            self._write_depth += 1
            return
        if self._read_depth():
            raise RuntimeError("cannot upgrade a read lock to a write lock")
        with self._cond:
            while self._writer is not None or self._readers:
                self._cond.wait()
            self._writer = me
            self._write_depth = 1

    def release_write(self):
        self._write_depth -= 1
        if self._write_depth:
            return
        with self._cond:
            self._writer = None
            self._cond.notify_all()

    @contextmanager
    def read(self):
        self.acquire_read()
        try:
            yield
        finally:
            self.release_read()

    @contextmanager
    def write(self):
        self.acquire_write()
        try:
            yield
        finally:
            self.release_write()

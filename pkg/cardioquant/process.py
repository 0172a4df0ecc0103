# -*- coding: utf-8 -*-
"""
Worker threads running one cross-validation fold each. The harness starts
at most ``threads`` of them at a time; every fold draws its randomness from
its own named streams, so results do not depend on scheduling.
"""
import logging
import time
from collections import OrderedDict
from threading import Thread, Event

log = logging.getLogger(__name__)

__all__ = ['FoldProcess', 'TrainingTask']


class TrainingTask(object):
    """
        TrainingTask records the progress of one network training inside a
        fold. A new task is created when a training starts; it is updated
        after every epoch. FoldProcess.tasks is keyed by task name
        (e.g. ``direct``, ``unet.inner2``).
    """
    def __init__(self, name, epochs, starttime=0):
        self.name = name
        self.epochs = epochs
        self.epoch = 0
        self.loss = None
        self.percent = 0.0
        self.status = 'started'
        self.starttime = starttime
        self.endtime = 0
        self.updated = starttime

    def __repr__(self):
        return "TrainingTask({0}: epoch {1}/{2}, loss={3})".format(
            self.name, self.epoch, self.epochs, self.loss)


class FoldProcess(Thread):
    """
        FoldProcess runs a fold function in a background thread.

        :param fold: fold id
        :param target: callable(fold, progress) returning the fold result;
                       ``progress(name, epoch, epochs, loss)`` must be called
                       by the training loops it runs
        :param event_callback: optional callable receiving this FoldProcess
                               every time a task progresses and once more
                               when the fold terminates
    """
    (DONE, READY, RUNNING, CANCELLED, FAILED) = range(5)

    def __init__(self, fold, target, event_callback=None):
        Thread.__init__(self, name="fold-{0}".format(fold))
        self.daemon = True
        self.fold = fold
        self.__target = target
        if event_callback and callable(event_callback):
            self.__event_callback = event_callback
        else:
            self.__event_callback = None
        self.__stop_event = Event()
        self.__state = self.READY
        self.__tasks = OrderedDict()
        self.__current_task = None
        self.__result = None
        self.__error = None
        self.__starttime = 0
        self.__endtime = 0

    def _progress(self, name, epoch, epochs, loss):
        if self.__stop_event.is_set():
            raise FoldCancelledException("fold {0} cancelled".format(
                self.fold))
        now = time.time()
        task = self.__tasks.get(name)
        if task is None or task.status == 'ended':
            task = TrainingTask(name, epochs, now)
            self.__tasks[name] = task
        self.__current_task = name
        task.epoch = epoch
        task.loss = loss
        task.percent = 100.0 * epoch / float(epochs)
        task.updated = now
        if epoch >= epochs:
            task.status = 'ended'
            task.endtime = now
        if self.__event_callback:
            self.__event_callback(self)

    def run(self):
        """
            Runs the fold in the calling thread; start() runs it in the
            background. Exceptions are kept and re-raised by result().

            :return: the fold result, None on failure
        """
        self.__state = self.RUNNING
        self.__starttime = time.time()
        try:
            self.__result = self.__target(self.fold, self._progress)
            self.__state = self.DONE
        except FoldCancelledException as error:
            self.__error = error
            self.__state = self.CANCELLED
        except Exception as error:
            log.debug("fold %s failed: %s", self.fold, error)
            self.__error = error
            self.__state = self.FAILED
        self.__endtime = time.time()
        if self.__event_callback:
            self.__event_callback(self)
        return self.__result

    def run_background(self):
        self.__state = self.RUNNING
        self.start()

    def stop(self):
        """
            Asks the fold to stop at the end of the current epoch.
        """
        self.__stop_event.set()

    def result(self):
        """
            :return: the fold result; re-raises the fold's exception
        """
        if self.__error is not None:
            raise self.__error
        return self.__result

    def is_running(self):
        return self.state == self.RUNNING

    def has_terminated(self):
        return self.state in (self.DONE, self.FAILED, self.CANCELLED)

    def has_failed(self):
        return self.state == self.FAILED

    def is_successful(self):
        return self.state == self.DONE

    @property
    def state(self):
        return self.__state

    @property
    def tasks(self):
        """
            :return: OrderedDict name -> TrainingTask
        """
        return self.__tasks

    @property
    def current_task(self):
        if self.__current_task is None:
            return None
        return self.__tasks[self.__current_task]

    @property
    def progress(self):
        task = self.current_task
        return task.percent if task else 0

    @property
    def elapsed(self):
        end = self.__endtime or time.time()
        return end - self.__starttime if self.__starttime else 0


def run_folds(targets, threads=1, event_callback=None):
    """
        Runs fold functions with at most ``threads`` workers at once.

        :param targets: OrderedDict fold -> callable(fold, progress)

        :return: OrderedDict fold -> result (in fold order); the first
                 failure is re-raised once every started fold has ended
    """
    threads = max(1, int(threads))
    processes = OrderedDict((fold, FoldProcess(fold, target, event_callback))
                            for fold, target in targets.items())
    if threads == 1:
        for proc in processes.values():
            proc.run()
            if proc.has_failed():
                proc.result()
    else:
        pending = list(processes.values())
        running = []
        while pending or running:
            while pending and len(running) < threads:
                proc = pending.pop(0)
                proc.run_background()
                running.append(proc)
            running[0].join()
            running = [p for p in running if p.is_alive()]
    return OrderedDict((fold, proc.result())
                       for fold, proc in processes.items())


class FoldCancelledException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg

# -*- coding: utf-8 -*-


class DictDiffer(object):
    """
        Key-level difference between a current and a past flat dictionary:
        keys added, keys removed, shared keys whose value changed and shared
        keys whose value did not.
    """
    def __init__(self, current_dict, past_dict):
        self.current_dict = current_dict
        self.past_dict = past_dict
        self.shared = set(current_dict) & set(past_dict)

    def added(self):
        return set(self.current_dict) - self.shared

    def removed(self):
        return set(self.past_dict) - self.shared

    def changed(self):
        return set(key for key in self.shared
                   if self.current_dict[key] != self.past_dict[key])

    def unchanged(self):
        return self.shared - self.changed()


class ReportDiff(DictDiffer):
    """
        ReportDiff compares two EvalReport objects, typically two runs of
        the same dataset with a different stacking mode or seed.

        Keys are those of EvalReport.get_dict():

        - ``mae::<method>::<index>``
        - ``group::<method>::<group>``
        - ``phase::<method>``

        The first report is the "current" one, the second the "past" one:
        ``added()`` lists keys only the first report carries.
    """
    def __init__(self, report1, report2):
        if report1.__class__ != report2.__class__:
            raise ReportDiffException("Comparing objects of different types")
        if (report1.id is not None and report2.id is not None and
                report1.id != report2.id):
            raise ReportDiffException("Comparing reports computed on "
                                      "different datasets")
        self.object1 = report1.get_dict()
        self.object2 = report2.get_dict()
        DictDiffer.__init__(self, self.object1, self.object2)

    def changes(self):
        """
            :return: sorted list of (key, value in report2, value in report1)
        """
        return [(key, self.past_dict[key], self.current_dict[key])
                for key in sorted(self.changed())]

    def __repr__(self):
        return ("added: [{0}] -- changed: [{1}] -- "
                "unchanged: [{2}] -- removed [{3}]".format(
                    len(self.added()), len(self.changed()),
                    len(self.unchanged()), len(self.removed())))


class ReportDiffException(Exception):
    def __init__(self, msg):
        self.msg = msg

    def __str__(self):
        return self.msg

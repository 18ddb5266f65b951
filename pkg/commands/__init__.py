"""隐形传态模拟器的子命令包"""

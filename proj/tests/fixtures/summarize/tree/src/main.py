import os
#not a heading
